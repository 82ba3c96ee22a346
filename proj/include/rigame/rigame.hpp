#pragma once

#include "rigame/ccp.hpp"
#include "rigame/config.hpp"
#include "rigame/dataset_io.hpp"
#include "rigame/design.hpp"
#include "rigame/equilibrium.hpp"
#include "rigame/errors.hpp"
#include "rigame/estimate.hpp"
#include "rigame/info.hpp"
#include "rigame/mc.hpp"
#include "rigame/model.hpp"
#include "rigame/optimize.hpp"
#include "rigame/parallel.hpp"
#include "rigame/quadrature.hpp"
#include "rigame/report_io.hpp"
#include "rigame/ri.hpp"
#include "rigame/rng.hpp"
#include "rigame/simulate.hpp"
#include "rigame/version.hpp"
