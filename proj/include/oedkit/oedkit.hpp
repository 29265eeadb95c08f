#pragma once

#include "config.hpp"
#include "criteria.hpp"
#include "csv.hpp"
#include "design.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "experiment.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "report.hpp"
#include "symlin.hpp"
#include "verify.hpp"
