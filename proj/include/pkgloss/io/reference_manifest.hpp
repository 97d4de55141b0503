#pragma once

// Generated by tools/update_manifest.sh. SHA-256 of each bundled data file.

#include <array>
#include <string_view>

namespace pkgloss::io {

struct ManifestEntry {
  std::string_view file;
  std::string_view sha256;
};

inline constexpr std::array<ManifestEntry, 5> reference_manifest{{
    {"designs.csv", "c17b1b98f31bcf302e9971b442fadf130ea3155eca53943d43507187343b55b1"},
    {"gamma_table.csv", "cba5658ea731ec9ba49ef5569617ab2fa731817d3b232a2f213e86b5b366a773"},
    {"materials.ini", "0abe0855ab902a6c2c351ed47265c72d94ab7fab688a996d59fe4cfbdc820dd1"},
    {"measured_qi.csv", "fab62df55258f8fb551812c5dc8c4664ad99054084aa0d9759c9aebee9c3284f"},
    {"package.ini", "07fc280243275f8fd70b09a159443532df52c14bcbe06a04a34343e11564d83e"},
}};

}  // namespace pkgloss::io
