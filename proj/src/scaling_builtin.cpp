#include "surfman/platforms_data.hpp"
#include "surfman/scaling.hpp"

namespace surfman::scaling {

std::vector<PlatformSpec> builtin_platforms() {
  return load_platforms_json(detail::kPlatformsJson);
}

}  // namespace surfman::scaling
