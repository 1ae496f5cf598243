#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace nase {

// Authenticated encryption container. On-disk layout, in order: magic "NASE"
// (4 bytes), version byte, 12-byte nonce, ciphertext, 16-byte tag. The
// ciphertext length is implied by the total size.
struct EncryptedBlob {
  uint8_t version = 1;
  std::array<uint8_t, 12> nonce{};
  std::vector<uint8_t> ciphertext;
  std::array<uint8_t, 16> tag{};

  bool operator==(const EncryptedBlob&) const = default;
};

// Raw AES block cipher on a single 16-byte block (the GCM core). Key must be
// 16 or 32 bytes; throws KeyError otherwise.
std::array<uint8_t, 16> aes_block_encrypt(const std::vector<uint8_t>& key,
                                          const std::array<uint8_t, 16>& block);

// AES in Galois/counter mode. Deterministic given (key, nonce, plaintext);
// the nonce must be unique per (key, message). Throws KeyError on bad key or
// nonce lengths.
EncryptedBlob aes_encrypt(const std::vector<uint8_t>& key,
                          const std::array<uint8_t, 12>& nonce,
                          const std::vector<uint8_t>& plaintext);

// Returns the exact plaintext iff the tag verifies; any corruption of nonce,
// ciphertext or tag raises AuthError and no plaintext is released.
std::vector<uint8_t> aes_decrypt(const std::vector<uint8_t>& key, const EncryptedBlob& blob);

std::vector<uint8_t> blob_serialize(const EncryptedBlob& blob);
EncryptedBlob blob_parse(const std::vector<uint8_t>& bytes);

void blob_save(const EncryptedBlob& blob, const std::string& path);
EncryptedBlob blob_load(const std::string& path);

// Key file loader: accepts exactly 16 or 32 raw bytes, or 32/64 hex digits
// (surrounding whitespace ignored). Throws KeyError otherwise.
std::vector<uint8_t> load_key_file(const std::string& path);

}  // namespace nase
