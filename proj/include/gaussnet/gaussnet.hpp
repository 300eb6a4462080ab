#pragma once

#include "gaussnet/error.hpp"
#include "gaussnet/symplectic.hpp"
#include "gaussnet/core.hpp"
#include "gaussnet/criteria.hpp"
#include "gaussnet/protocol.hpp"
#include "gaussnet/optimize.hpp"
#include "gaussnet/sampler.hpp"
#include "gaussnet/io.hpp"
