#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace stsim {

/// Decodes strict UTF-8 into code points. Throws on malformed input.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto cont = [&](std::size_t k) {
    return k < s.size() && (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
  };
  while (i < s.size()) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp;
    std::size_t len;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      if (!cont(i + 1)) throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
      cp = (char32_t(b0 & 0x1F) << 6) | (s[i + 1] & 0x3F);
      if (cp < 0x80) throw std::runtime_error("overlong UTF-8 at byte " + std::to_string(i));
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      if (!cont(i + 1) || !cont(i + 2))
        throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
      cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F);
      if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))
        throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      if (!cont(i + 1) || !cont(i + 2) || !cont(i + 3))
        throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
      cp = (char32_t(b0 & 0x07) << 18) | (char32_t(s[i + 1] & 0x3F) << 12) |
           (char32_t(s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F);
      if (cp < 0x10000 || cp > 0x10FFFF)
        throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
      len = 4;
    } else {
      throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

/// NFC-normalizes and lowercases (simple per-code-point mapping, locale
/// independent). Input must be valid UTF-8.
inline std::u32string normalized_codepoints(std::string_view utf8) {
  std::u32string decoded = decode_utf8(utf8);  // validates
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec)) throw std::runtime_error("ICU NFC unavailable");
  icu::UnicodeString us = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(decoded.data()), static_cast<int32_t>(decoded.size()));
  icu::UnicodeString norm = nfc->normalize(us, ec);
  if (U_FAILURE(ec)) throw std::runtime_error("NFC normalization failed");
  std::u32string out;
  out.reserve(static_cast<std::size_t>(norm.length()));
  for (int32_t i = 0; i < norm.length();) {
    UChar32 cp = norm.char32At(i);
    out.push_back(static_cast<char32_t>(u_tolower(cp)));
    i += U16_LENGTH(cp);
  }
  return out;
}

inline bool is_word_char(char32_t cp) { return u_isalnum(static_cast<UChar32>(cp)); }

inline bool is_space_char(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

}  // namespace stsim
