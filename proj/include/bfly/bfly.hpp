#ifndef BFLY_BFLY_HPP
#define BFLY_BFLY_HPP

#include "bfly/core.hpp"
#include "bfly/linalg.hpp"
#include "bfly/tree.hpp"
#include "bfly/butterfly.hpp"
#include "bfly/serialize.hpp"
#include "bfly/operators.hpp"
#include "bfly/reconstruct.hpp"
#include "bfly/layout.hpp"

#endif  // BFLY_BFLY_HPP
