#ifndef DIREVAL_VERSION_HPP
#define DIREVAL_VERSION_HPP

namespace direval {

inline constexpr const char* kVersion = "0.1.0";

} // namespace direval

#endif // DIREVAL_VERSION_HPP
