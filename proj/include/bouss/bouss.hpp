#pragma once

#include "bouss/anderson.hpp"
#include "bouss/assembly.hpp"
#include "bouss/bench.hpp"
#include "bouss/fespace.hpp"
#include "bouss/fixedpoint.hpp"
#include "bouss/linesearch.hpp"
#include "bouss/linsolve.hpp"
#include "bouss/mesh.hpp"
#include "bouss/quadrature.hpp"
#include "bouss/state.hpp"
