#pragma once

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/diagnostics/compatibility.hpp"
#include "delay_heat/diagnostics/identity.hpp"
#include "delay_heat/diagnostics/jumps.hpp"
#include "delay_heat/diagnostics/regularity.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/figure.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/picard.hpp"
#include "delay_heat/quadrature.hpp"
#include "delay_heat/reference/hybrid.hpp"
#include "delay_heat/reference/rk4_dde.hpp"
#include "delay_heat/spectral.hpp"
#include "delay_heat/trace.hpp"
#include "delay_heat/validation.hpp"
#include "delay_heat/version.hpp"
