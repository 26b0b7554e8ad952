#pragma once

#include "dw/consult.hpp"
#include "dw/diagram.hpp"
#include "dw/error.hpp"
#include "dw/library.hpp"
#include "dw/oracle.hpp"
#include "dw/schema.hpp"
#include "dw/sensitivity.hpp"
#include "dw/solver.hpp"
#include "dw/store/codec.hpp"
#include "dw/store/session_store.hpp"
