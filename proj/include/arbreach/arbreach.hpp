#pragma once

#include "arbreach/error.hpp"
#include "arbreach/battery.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/thresholds.hpp"
#include "arbreach/policy.hpp"
#include "arbreach/offline.hpp"
#include "arbreach/reachability.hpp"
#include "arbreach/conformal.hpp"
#include "arbreach/config.hpp"
#include "arbreach/digest.hpp"
#include "arbreach/experiment.hpp"
