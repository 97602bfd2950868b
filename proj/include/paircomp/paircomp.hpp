#pragma once

#include "paircomp/csv.hpp"
#include "paircomp/embedding.hpp"
#include "paircomp/errors.hpp"
#include "paircomp/grid.hpp"
#include "paircomp/integrator.hpp"
#include "paircomp/labeling.hpp"
#include "paircomp/measure.hpp"
#include "paircomp/model.hpp"
#include "paircomp/picard.hpp"
#include "paircomp/rng.hpp"
#include "paircomp/scenario.hpp"
#include "paircomp/studies.hpp"
