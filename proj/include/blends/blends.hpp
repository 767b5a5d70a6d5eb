#pragma once

#include "blends/backward_info.hpp"
#include "blends/config.hpp"
#include "blends/errors.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/fusion.hpp"
#include "blends/geodesy.hpp"
#include "blends/io.hpp"
#include "blends/linalg.hpp"
#include "blends/metrics.hpp"
#include "blends/pipeline.hpp"
#include "blends/simkit.hpp"
#include "blends/smoothers.hpp"
#include "blends/strapdown.hpp"
#include "blends/types.hpp"
