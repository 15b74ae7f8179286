#pragma once

#include "almsdp/error.hpp"
#include "almsdp/symcone.hpp"
#include "almsdp/model.hpp"
#include "almsdp/inner.hpp"
#include "almsdp/alm.hpp"
#include "almsdp/diagnostics.hpp"
#include "almsdp/fixtures.hpp"
#include "almsdp/io.hpp"
