#pragma once

#include "z2sync/certificates.hpp"
#include "z2sync/conditions.hpp"
#include "z2sync/instance_io.hpp"
#include "z2sync/instances.hpp"
#include "z2sync/manifold.hpp"
#include "z2sync/rng.hpp"
#include "z2sync/solver.hpp"
#include "z2sync/spectral.hpp"
#include "z2sync/sweep.hpp"
#include "z2sync/types.hpp"
