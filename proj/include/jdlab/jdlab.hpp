#ifndef JDLAB_JDLAB_HPP
#define JDLAB_JDLAB_HPP

#include "common.hpp"
#include "special.hpp"
#include "space.hpp"
#include "forms.hpp"
#include "criteria.hpp"
#include "kernels.hpp"
#include "capacity.hpp"
#include "simulate.hpp"
#include "io.hpp"

#endif  // JDLAB_JDLAB_HPP
