#pragma once

#include "oseen/errors.hpp"
#include "oseen/geometry.hpp"
#include "oseen/mesh.hpp"
#include "oseen/quadrature.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/linalg.hpp"
#include "oseen/assembly.hpp"
#include "oseen/characteristics.hpp"
#include "oseen/problems.hpp"
#include "oseen/stokes_projection.hpp"
#include "oseen/scheme.hpp"
#include "oseen/study.hpp"
