#pragma once

#include "searchplan/units.hpp"
#include "searchplan/geo.hpp"
#include "searchplan/particles.hpp"
#include "searchplan/grid.hpp"
#include "searchplan/environment.hpp"
#include "searchplan/synthetic.hpp"
#include "searchplan/drift.hpp"
#include "searchplan/prior.hpp"
#include "searchplan/detection.hpp"
#include "searchplan/bayes.hpp"
#include "searchplan/allocation.hpp"
