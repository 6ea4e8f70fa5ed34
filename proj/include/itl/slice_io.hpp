/**
 * @file slice_io.hpp
 * @brief Binary containers for slices (`ATMS`) and GW fields (`GWRL`).
 *
 * Layout: magic (4 bytes), format version u16, n_alt u32, n_range u32,
 * little-endian float32 row-major grid, float64 altitude axis, float64 range
 * axis, u32 length-prefixed UTF-8 JSON metadata blob.
 */
#ifndef ITL_SLICE_IO_HPP
#define ITL_SLICE_IO_HPP

#include <filesystem>
#include <string>

#include "itl/atmosphere.hpp"
#include "itl/gwfield.hpp"

namespace itl {

inline constexpr std::uint16_t kContainerVersion = 1;

void write_slice(const AtmosphericSlice& slice, const std::filesystem::path& path);
AtmosphericSlice read_slice(const std::filesystem::path& path);

void write_gw_realization(const GwRealization& field,
                          const std::filesystem::path& path);
GwRealization read_gw_realization(const std::filesystem::path& path);

}  // namespace itl

#endif  // ITL_SLICE_IO_HPP
