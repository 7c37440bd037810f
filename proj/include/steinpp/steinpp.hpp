#ifndef STEINPP_STEINPP_HPP
#define STEINPP_STEINPP_HPP

#include "steinpp/rng.hpp"
#include "steinpp/error.hpp"
#include "steinpp/montecarlo.hpp"
#include "steinpp/geometry.hpp"
#include "steinpp/kernel.hpp"
#include "steinpp/configuration_ops.hpp"
#include "steinpp/models.hpp"
#include "steinpp/transforms.hpp"
#include "steinpp/papangelou.hpp"
#include "steinpp/distances.hpp"
#include "steinpp/glauber.hpp"
#include "steinpp/stein_bounds.hpp"
#include "steinpp/io.hpp"
#include "steinpp/config.hpp"

#endif  // STEINPP_STEINPP_HPP
