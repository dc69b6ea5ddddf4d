#pragma once

// Special functions and integration engines shared by the analytic layer.

#include "irslab/bessel.hpp"
#include "irslab/gil_pelaez.hpp"
#include "irslab/quadrature.hpp"
