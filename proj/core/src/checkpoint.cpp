#include "bmqt/checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "bmqt/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace bmqt {

std::string canonical_param_string(const ModelParams& p) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "xi=%.17g;lambda_bulk=%.17g;a=%.17g;m=%.17g;k=%.17g;A0=%.17g;Ak=%.17g;"
                "A_minus2=%.17g;Gamma0=%.17g;Gamma1=%.17g;mu0=%.17g;mu1=%.17g",
                p.xi, p.lambda_bulk, p.a, p.m, p.k, p.A0, p.Ak, p.A_minus2, p.Gamma0, p.Gamma1,
                p.mu0, p.mu1);
  return buf;
}

std::array<std::uint8_t, 32> param_digest(const ModelParams& params) {
  const std::string text = canonical_param_string(params);
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr);
  if (len != 32) throw config_error("param_digest: unexpected digest length");
  return out;
}

namespace {

void write_bytes(std::ofstream& os, const void* data, std::size_t size) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void read_bytes(std::ifstream& is, void* data, std::size_t size, const char* what) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!is) throw config_error(std::string("load_checkpoint: truncated file while reading ") + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const FieldState& st, const ModelParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw config_error("save_checkpoint: cannot open " + path);

  write_bytes(os, "BMQT", 4);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint32_t n = static_cast<std::uint32_t>(st.n);
  write_bytes(os, &version, 4);
  write_bytes(os, &n, 4);
  write_bytes(os, &st.time, 8);
  const auto digest = param_digest(params);
  write_bytes(os, digest.data(), digest.size());

  for (int c = 0; c < 3; ++c)
    write_bytes(os, st.u[c].data(), st.nodes() * sizeof(double));
  for (int c = 0; c < 5; ++c)
    write_bytes(os, st.q[c].data(), st.nodes() * sizeof(double));
  write_bytes(os, st.theta.data(), st.nodes() * sizeof(double));
  if (!os) throw config_error("save_checkpoint: write failed for " + path);
}

FieldState load_checkpoint(const std::string& path, const ModelParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("load_checkpoint: cannot open " + path);

  char magic[4];
  read_bytes(is, magic, 4, "magic");
  if (std::memcmp(magic, "BMQT", 4) != 0)
    throw config_error("load_checkpoint: bad magic bytes in " + path);
  std::uint32_t version = 0, n = 0;
  read_bytes(is, &version, 4, "version");
  if (version != kCheckpointVersion)
    throw config_error("load_checkpoint: unsupported format version " + std::to_string(version));
  read_bytes(is, &n, 4, "grid size");
  if (n < 8 || n % 2 != 0 || n > 4096)
    throw config_error("load_checkpoint: implausible grid size " + std::to_string(n));
  double time = 0.0;
  read_bytes(is, &time, 8, "time");
  std::array<std::uint8_t, 32> digest{};
  read_bytes(is, digest.data(), 32, "parameter digest");
  if (digest != param_digest(params))
    throw config_error(
        "load_checkpoint: parameter digest mismatch (checkpoint was produced with different "
        "model parameters)");

  FieldState st;
  st.allocate(static_cast<int>(n));
  st.time = time;
  for (int c = 0; c < 3; ++c)
    read_bytes(is, st.u[c].data(), st.nodes() * sizeof(double), "u");
  for (int c = 0; c < 5; ++c)
    read_bytes(is, st.q[c].data(), st.nodes() * sizeof(double), "Q");
  read_bytes(is, st.theta.data(), st.nodes() * sizeof(double), "theta");
  return st;
}

}  // namespace bmqt
