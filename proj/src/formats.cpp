#include "coverage.hpp"
#include "sim.hpp"

namespace covagent {

CoverageDatabase parse_coverage_file(const std::filesystem::path& path, CoverageFormat format) {
  switch (format) {
    case CoverageFormat::Canonical:
      return parse_canonical(read_text_file(path), path.string());
    case CoverageFormat::Info:
      return parse_info(read_text_file(path), path.string());
    case CoverageFormat::Manifest:
      return DesignManifest::load(path).universe();
  }
  fail(ErrorKind::Invalid, "unknown coverage format");
}

}  // namespace covagent
