#pragma once

#include <cstdint>

#include "bytes.hpp"

namespace delog {

// Decodes one block payload back into original text and appends it to out.
// Appends the line separator after the block's last line unless this is the
// final block of an archive whose source did not end with a newline.
// Self-contained: every fact needed comes from the payload itself.
void decode_block(bytes_view payload, bool last_block, bool trailing_newline, bytes& out);

}  // namespace delog
