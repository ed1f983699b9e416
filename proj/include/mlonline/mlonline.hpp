#pragma once

#include "mlonline/adversary.hpp"
#include "mlonline/agnostic.hpp"
#include "mlonline/certificate.hpp"
#include "mlonline/class_io.hpp"
#include "mlonline/csv.hpp"
#include "mlonline/core.hpp"
#include "mlonline/dimensions.hpp"
#include "mlonline/error.hpp"
#include "mlonline/exp4.hpp"
#include "mlonline/experts.hpp"
#include "mlonline/harness.hpp"
#include "mlonline/learner.hpp"
#include "mlonline/o2b.hpp"
#include "mlonline/oracle.hpp"
#include "mlonline/registry.hpp"
#include "mlonline/soa.hpp"
#include "mlonline/svwm.hpp"
