#pragma once

#include "vek/numerics/kmeans.hpp"
#include "vek/numerics/logistic.hpp"
#include "vek/numerics/matrix.hpp"
#include "vek/numerics/neighbors.hpp"
#include "vek/numerics/pca.hpp"
#include "vek/numerics/stats.hpp"
