#pragma once

#include <map>
#include <string>

namespace evoplace::assets {

/// Files compiled into the library, keyed by file name (e.g. "grammar.md").
const std::map<std::string, std::string>& all();

}  // namespace evoplace::assets
