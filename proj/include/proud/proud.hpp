#ifndef PROUD_PROUD_HPP_
#define PROUD_PROUD_HPP_

#include "proud/error.hpp"
#include "proud/guidance.hpp"
#include "proud/manifold.hpp"
#include "proud/metrics.hpp"
#include "proud/mgd.hpp"
#include "proud/objectives.hpp"
#include "proud/sampler.hpp"
#include "proud/schedule.hpp"

#endif  // PROUD_PROUD_HPP_
