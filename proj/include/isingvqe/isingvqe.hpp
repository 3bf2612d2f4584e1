#pragma once

#include "ansatz.hpp"
#include "bipartite.hpp"
#include "circuit.hpp"
#include "errors.hpp"
#include "exact.hpp"
#include "lattice.hpp"
#include "observables.hpp"
#include "optimize.hpp"
#include "pauli.hpp"
#include "statevector.hpp"
#include "vqe.hpp"
#include "experiment.hpp"
