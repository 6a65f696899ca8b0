#pragma once

#include <string>

namespace qrouter {

/// Splits "http://host:port/path" into the scheme+authority and the path.
struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl split_url(const std::string& url);

/// Value of the named environment variable, empty when unset or when
/// `name` is empty.
std::string env_or_empty(const std::string& name);

}  // namespace qrouter
