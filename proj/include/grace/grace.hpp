#ifndef GRACE_GRACE_HPP
#define GRACE_GRACE_HPP

#include "grace/checkpoint.hpp"
#include "grace/clustering.hpp"
#include "grace/config.hpp"
#include "grace/data.hpp"
#include "grace/error.hpp"
#include "grace/graph.hpp"
#include "grace/metrics.hpp"
#include "grace/model.hpp"
#include "grace/nn.hpp"
#include "grace/propagation.hpp"
#include "grace/random.hpp"
#include "grace/trainer.hpp"

#endif  // GRACE_GRACE_HPP
