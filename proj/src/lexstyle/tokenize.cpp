#include "emergent/lexstyle.hpp"

#include "emergent/utf8.hpp"

namespace emergent::lexstyle {

namespace {

bool is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0xA0 ||
           (c >= 0x2000 && c <= 0x200B) || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_letter(char32_t c) {
    if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
    if (c < 0xC0) return c == 0xAA || c == 0xB5 || c == 0xBA;
    if (c == 0xD7 || c == 0xF7) return false;
    if (c <= 0x24F) return true;                  // Latin-1 letters, Latin Extended-A/B
    if (c >= 0x370 && c <= 0x52F) return c != 0x37E && c != 0x387;  // Greek, Cyrillic
    if (c >= 0x1E00 && c <= 0x1FFF) return true;  // Latin Extended Additional, Greek Extended
    if (c >= 0x2000 && c <= 0x2BFF) return false; // punctuation, symbols, arrows
    if (c >= 0x3000 && c <= 0x303F) return false; // CJK punctuation
    if (c >= 0xFE30 && c <= 0xFE6F) return false;
    if (c >= 0xFF00 && c <= 0xFF20) return false;
    if (c >= 0x1F000) return false;               // emoji and pictographs
    return c >= 0x250;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }
bool is_hyphen(char32_t c) { return c == U'-' || c == 0x2010 || c == 0x2011; }

char32_t lower(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return (c % 2 == 0) ? c + 1 : c;
    if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x178) return 0xFF;
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text, std::string_view /*lang*/) {
    const std::u32string cps = utf8::decode(text);
    std::vector<Token> tokens;
    const std::size_t n = cps.size();
    std::size_t i = 0;
    while (i < n) {
        const char32_t c = cps[i];
        if (is_space(c)) {
            ++i;
        } else if (is_letter(c)) {
            Token t{{}, TokenKind::word};
            while (i < n && (is_letter(cps[i]) || is_digit(cps[i]))) {
                utf8::append(t.text, lower(cps[i]));
                ++i;
            }
            tokens.push_back(std::move(t));
            // A hyphen or apostrophe followed by a letter only separates words.
            if (i + 1 < n && (is_hyphen(cps[i]) || is_apostrophe(cps[i])) && is_letter(cps[i + 1])) {
                ++i;
            }
        } else if (is_digit(c)) {
            Token t{{}, TokenKind::number};
            while (i < n) {
                if (is_digit(cps[i])) {
                    t.text += static_cast<char>(cps[i]);
                    ++i;
                } else if ((cps[i] == U'.' || cps[i] == U',') && i + 1 < n && is_digit(cps[i + 1])) {
                    t.text += static_cast<char>(cps[i]);
                    ++i;
                } else {
                    break;
                }
            }
            tokens.push_back(std::move(t));
        } else {
            Token t{{}, TokenKind::punct};
            utf8::append(t.text, c);
            tokens.push_back(std::move(t));
            ++i;
        }
    }
    return tokens;
}

std::vector<std::string> terms(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::punct) {
            out.push_back(t.text);
        }
    }
    return out;
}

}  // namespace emergent::lexstyle
