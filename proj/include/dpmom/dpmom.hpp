#ifndef DPMOM_DPMOM_HPP
#define DPMOM_DPMOM_HPP

// umbrella header

#include "dpmom/baselines.hpp"
#include "dpmom/core.hpp"
#include "dpmom/csvio.hpp"
#include "dpmom/data.hpp"
#include "dpmom/dp_mom.hpp"
#include "dpmom/error.hpp"
#include "dpmom/metrics.hpp"
#include "dpmom/mom.hpp"
#include "dpmom/partition.hpp"
#include "dpmom/rng.hpp"
#include "dpmom/sha256.hpp"
#include "dpmom/svg.hpp"
#include "dpmom/theoryprobe.hpp"
#include "dpmom/tuning.hpp"

#endif  // DPMOM_DPMOM_HPP
