#ifndef PSI_PSI_HPP
#define PSI_PSI_HPP

#include "psi/names.hpp"
#include "psi/term.hpp"
#include "psi/agent.hpp"
#include "psi/instance.hpp"
#include "psi/instances.hpp"
#include "psi/params.hpp"
#include "psi/syntax.hpp"
#include "psi/concrete.hpp"
#include "psi/constraints.hpp"
#include "psi/symbolic.hpp"
#include "psi/lts.hpp"
#include "psi/bisim.hpp"

#endif  // PSI_PSI_HPP
