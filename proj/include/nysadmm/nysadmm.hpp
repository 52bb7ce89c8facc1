#pragma once

#include <nysadmm/admm.hpp>
#include <nysadmm/linops.hpp>
#include <nysadmm/nystrom.hpp>
#include <nysadmm/pcg.hpp>
#include <nysadmm/precond.hpp>
#include <nysadmm/problems.hpp>
#include <nysadmm/prox.hpp>
#include <nysadmm/types.hpp>
