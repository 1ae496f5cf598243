#include "nase/crypto.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <memory>

#include "nase/error.hpp"

namespace nase {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'S', 'E'};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx new_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx) throw Error("crypto", "EVP_CIPHER_CTX_new failed");
  return ctx;
}

const EVP_CIPHER* gcm_cipher(size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_gcm();
    case 32: return EVP_aes_256_gcm();
    default:
      throw KeyError("AES key must be 16 or 32 bytes, got " + std::to_string(key_len));
  }
}

const EVP_CIPHER* ecb_cipher(size_t key_len) {
  switch (key_len) {
    case 16: return EVP_aes_128_ecb();
    case 32: return EVP_aes_256_ecb();
    default:
      throw KeyError("AES key must be 16 or 32 bytes, got " + std::to_string(key_len));
  }
}

}  // namespace

std::array<uint8_t, 16> aes_block_encrypt(const std::vector<uint8_t>& key,
                                          const std::array<uint8_t, 16>& block) {
  const EVP_CIPHER* cipher = ecb_cipher(key.size());
  CipherCtx ctx = new_ctx();
  if (EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, key.data(), nullptr) != 1) {
    throw Error("crypto", "AES block init failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  std::array<uint8_t, 16> out{};
  int out_len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &out_len, block.data(),
                        static_cast<int>(block.size())) != 1 ||
      out_len != 16) {
    throw Error("crypto", "AES block encrypt failed");
  }
  int final_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + out_len, &final_len) != 1 ||
      final_len != 0) {
    throw Error("crypto", "AES block finalize failed");
  }
  return out;
}

EncryptedBlob aes_encrypt(const std::vector<uint8_t>& key,
                          const std::array<uint8_t, 12>& nonce,
                          const std::vector<uint8_t>& plaintext) {
  const EVP_CIPHER* cipher = gcm_cipher(key.size());
  CipherCtx ctx = new_ctx();
  if (EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(nonce.size()), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    throw Error("crypto", "AES-GCM encrypt init failed");
  }

  EncryptedBlob blob;
  blob.nonce = nonce;
  blob.ciphertext.resize(plaintext.size());
  int out_len = 0;
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), blob.ciphertext.data(), &out_len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw Error("crypto", "AES-GCM encrypt failed");
  }
  int final_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), blob.ciphertext.data() + out_len, &final_len) != 1) {
    throw Error("crypto", "AES-GCM finalize failed");
  }
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG,
                          static_cast<int>(blob.tag.size()), blob.tag.data()) != 1) {
    throw Error("crypto", "AES-GCM tag extraction failed");
  }
  return blob;
}

std::vector<uint8_t> aes_decrypt(const std::vector<uint8_t>& key, const EncryptedBlob& blob) {
  const EVP_CIPHER* cipher = gcm_cipher(key.size());
  CipherCtx ctx = new_ctx();
  if (EVP_DecryptInit_ex(ctx.get(), cipher, nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                          static_cast<int>(blob.nonce.size()), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), blob.nonce.data()) != 1) {
    throw Error("crypto", "AES-GCM decrypt init failed");
  }

  std::vector<uint8_t> plaintext(blob.ciphertext.size());
  int out_len = 0;
  if (!blob.ciphertext.empty() &&
      EVP_DecryptUpdate(ctx.get(), plaintext.data(), &out_len, blob.ciphertext.data(),
                        static_cast<int>(blob.ciphertext.size())) != 1) {
    throw AuthError("AES-GCM authentication failed");
  }
  std::array<uint8_t, 16> tag = blob.tag;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG,
                          static_cast<int>(tag.size()), tag.data()) != 1) {
    throw Error("crypto", "AES-GCM tag set failed");
  }
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + out_len, &final_len) != 1) {
    throw AuthError("AES-GCM authentication failed");
  }
  return plaintext;
}

std::vector<uint8_t> blob_serialize(const EncryptedBlob& blob) {
  std::vector<uint8_t> bytes;
  bytes.reserve(4 + 1 + blob.nonce.size() + blob.ciphertext.size() + blob.tag.size());
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  bytes.push_back(blob.version);
  bytes.insert(bytes.end(), blob.nonce.begin(), blob.nonce.end());
  bytes.insert(bytes.end(), blob.ciphertext.begin(), blob.ciphertext.end());
  bytes.insert(bytes.end(), blob.tag.begin(), blob.tag.end());
  return bytes;
}

EncryptedBlob blob_parse(const std::vector<uint8_t>& bytes) {
  constexpr size_t kMinSize = 4 + 1 + 12 + 16;
  if (bytes.size() < kMinSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an encrypted NASE blob");
  }
  EncryptedBlob blob;
  blob.version = bytes[4];
  if (blob.version != 1) {
    throw UnsupportedError("unsupported blob version " + std::to_string(blob.version));
  }
  std::copy(bytes.begin() + 5, bytes.begin() + 17, blob.nonce.begin());
  blob.ciphertext.assign(bytes.begin() + 17, bytes.end() - 16);
  std::copy(bytes.end() - 16, bytes.end(), blob.tag.begin());
  return blob;
}

void blob_save(const EncryptedBlob& blob, const std::string& path) {
  const std::vector<uint8_t> bytes = blob_serialize(blob);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!file.good()) throw IoError("write failed: " + path);
}

EncryptedBlob blob_load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                             std::istreambuf_iterator<char>());
  return blob_parse(bytes);
}

std::vector<uint8_t> load_key_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw KeyError("cannot open key file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() == 16 || bytes.size() == 32) return bytes;

  // try hex with surrounding whitespace
  std::string hex;
  for (uint8_t b : bytes) {
    if (std::isspace(b)) continue;
    if (!std::isxdigit(b)) throw KeyError("key file must hold 16/32 raw bytes or hex: " + path);
    hex.push_back(static_cast<char>(b));
  }
  if (hex.size() != 32 && hex.size() != 64) {
    throw KeyError("key file must decode to 16 or 32 bytes: " + path);
  }
  std::vector<uint8_t> key(hex.size() / 2);
  for (size_t i = 0; i < key.size(); ++i) {
    key[i] = static_cast<uint8_t>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  }
  return key;
}

}  // namespace nase
