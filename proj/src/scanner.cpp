#include "scanner.hpp"

namespace delog {

SplitToken split_token(bytes_view token) {
    SplitToken split;
    split.token_length = token.size();
    for (char c : token) {
        const auto b = static_cast<unsigned char>(c);
        if (is_ascii_special(b)) {
            split.ascii_special.push_back(c);
        } else {
            split.general_content.push_back(c);
        }
    }
    return split;
}

}  // namespace delog
