#pragma once

#include "error.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "sparse.hpp"
#include "assembly.hpp"
#include "steklov.hpp"
#include "quadrature.hpp"
#include "pseudoparabolic.hpp"
#include "experiments.hpp"
#include "io.hpp"
