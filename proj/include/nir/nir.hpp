#pragma once

// Umbrella header.
#include "nir/error.hpp"
#include "nir/tensor.hpp"
#include "nir/primitives.hpp"
#include "nir/graph.hpp"
#include "nir/validate.hpp"
#include "nir/serialize.hpp"
#include "nir/dialects.hpp"
#include "nir/engine.hpp"
#include "nir/trace_io.hpp"
#include "nir/passes.hpp"
#include "nir/quantize.hpp"
#include "nir/constraints.hpp"
#include "nir/lower.hpp"
#include "nir/analysis.hpp"
#include "nir/report.hpp"
