#pragma once

#include <vector>

namespace dmtl {

using Embedding = std::vector<double>;
using SessionEmbeddings = std::vector<Embedding>;

}  // namespace dmtl
