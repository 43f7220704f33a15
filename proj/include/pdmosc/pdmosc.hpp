#ifndef PDMOSC_PDMOSC_HPP
#define PDMOSC_PDMOSC_HPP

#include "pdmosc/classical.hpp"
#include "pdmosc/eigensolve.hpp"
#include "pdmosc/model.hpp"
#include "pdmosc/ode.hpp"
#include "pdmosc/quantum.hpp"
#include "pdmosc/specfun.hpp"

#endif  // PDMOSC_PDMOSC_HPP
