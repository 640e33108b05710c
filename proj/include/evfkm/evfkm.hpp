#pragma once

#include "evfkm/baselines.hpp"
#include "evfkm/core.hpp"
#include "evfkm/dataset.hpp"
#include "evfkm/experiment.hpp"
#include "evfkm/fit.hpp"
#include "evfkm/matrix.hpp"
#include "evfkm/metrics.hpp"
#include "evfkm/random.hpp"
