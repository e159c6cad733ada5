#pragma once

#include "vek/xdiag/adapter.hpp"
#include "vek/xdiag/properties.hpp"
#include "vek/xdiag/saliency.hpp"
