#pragma once

// Text of the data/ files, compiled in so the library works without them.
namespace dmtl::bundled {

extern const char* const kLexicon;
extern const char* const kMisspellings;
extern const char* const kContractions;
extern const char* const kCommonWords;

}  // namespace dmtl::bundled
