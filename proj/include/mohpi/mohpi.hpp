#pragma once

#include "mohpi/ablation.hpp"
#include "mohpi/configspace.hpp"
#include "mohpi/dataset.hpp"
#include "mohpi/errors.hpp"
#include "mohpi/fanova.hpp"
#include "mohpi/forest.hpp"
#include "mohpi/pareto.hpp"
#include "mohpi/report.hpp"
#include "mohpi/svg.hpp"
#include "mohpi/synthetic.hpp"
