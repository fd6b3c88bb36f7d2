#pragma once

#include "wbcbench/apportion.hpp"
#include "wbcbench/batch.hpp"
#include "wbcbench/config.hpp"
#include "wbcbench/csv.hpp"
#include "wbcbench/degradation_config.hpp"
#include "wbcbench/error.hpp"
#include "wbcbench/evaluator.hpp"
#include "wbcbench/image.hpp"
#include "wbcbench/manifest.hpp"
#include "wbcbench/operators.hpp"
#include "wbcbench/png.hpp"
#include "wbcbench/random.hpp"
#include "wbcbench/recipe.hpp"
#include "wbcbench/severity.hpp"
#include "wbcbench/splitter.hpp"
#include "wbcbench/synth.hpp"
#include "wbcbench/taxonomy.hpp"
