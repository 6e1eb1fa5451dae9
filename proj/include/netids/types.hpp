#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "netids/common.hpp"

namespace netids {

// Attack subcategories plus normal. Order is fixed; codes are stable across
// every file format in the toolkit.
enum class Subcategory : uint8_t {
  ddos_http = 0,
  ddos_tcp = 1,
  ddos_udp = 2,
  dos_http = 3,
  dos_tcp = 4,
  dos_udp = 5,
  os_fingerprint = 6,
  service_scan = 7,
  data_exfiltration = 8,
  keylogging = 9,
  normal = 10,
};

inline constexpr size_t kSubcategoryCount = 11;
inline constexpr size_t kAttackSubcategoryCount = 10;

enum class Category : uint8_t {
  ddos = 0,
  dos = 1,
  reconnaissance = 2,
  theft = 3,
  normal = 4,
};

// Multi-class target codes: 0=normal, 1=ddos_dos, 2=theft, 3=reconnaissance.
inline constexpr int kNumClasses = 4;

inline constexpr std::array<std::string_view, kSubcategoryCount> kSubcategoryNames = {
    "ddos_http",      "ddos_tcp",     "ddos_udp",          "dos_http",
    "dos_tcp",        "dos_udp",      "os_fingerprint",    "service_scan",
    "data_exfiltration", "keylogging", "normal",
};

inline constexpr std::array<std::string_view, 5> kCategoryNames = {
    "ddos", "dos", "reconnaissance", "theft", "normal",
};

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "normal", "ddos_dos", "theft", "reconnaissance",
};

inline constexpr Category category_of(Subcategory s) {
  switch (s) {
    case Subcategory::ddos_http:
    case Subcategory::ddos_tcp:
    case Subcategory::ddos_udp:
      return Category::ddos;
    case Subcategory::dos_http:
    case Subcategory::dos_tcp:
    case Subcategory::dos_udp:
      return Category::dos;
    case Subcategory::os_fingerprint:
    case Subcategory::service_scan:
      return Category::reconnaissance;
    case Subcategory::data_exfiltration:
    case Subcategory::keylogging:
      return Category::theft;
    case Subcategory::normal:
      return Category::normal;
  }
  return Category::normal;
}

inline constexpr uint8_t class_code_of(Category c) {
  switch (c) {
    case Category::normal:
      return 0;
    case Category::ddos:
    case Category::dos:
      return 1;
    case Category::theft:
      return 2;
    case Category::reconnaissance:
      return 3;
  }
  return 0;
}

inline constexpr uint8_t class_code_of(Subcategory s) { return class_code_of(category_of(s)); }

inline std::string_view name_of(Subcategory s) { return kSubcategoryNames[size_t(s)]; }
inline std::string_view name_of(Category c) { return kCategoryNames[size_t(c)]; }

inline std::optional<Subcategory> subcategory_from_name(std::string_view name) {
  for (size_t i = 0; i < kSubcategoryNames.size(); ++i)
    if (kSubcategoryNames[i] == name) return Subcategory(i);
  return std::nullopt;
}

}  // namespace netids
