#pragma once

#include "riskshare/allocate.hpp"
#include "riskshare/allocation.hpp"
#include "riskshare/beliefs.hpp"
#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/infconv.hpp"
#include "riskshare/io.hpp"
#include "riskshare/piecewise.hpp"
#include "riskshare/polynomial.hpp"
#include "riskshare/riskmetric.hpp"
#include "riskshare/scalar.hpp"
#include "riskshare/verify.hpp"
