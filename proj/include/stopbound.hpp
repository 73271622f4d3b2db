#pragma once

#include "stopbound/boundary.hpp"
#include "stopbound/curve.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/io.hpp"
#include "stopbound/kinks.hpp"
#include "stopbound/mc.hpp"
#include "stopbound/model.hpp"
#include "stopbound/rational.hpp"
#include "stopbound/solver.hpp"
#include "stopbound/verify.hpp"
