#ifndef MINVAE_CORPUS_IO_HPP_
#define MINVAE_CORPUS_IO_HPP_

#include <string>

#include "minvae/evaldata.hpp"

namespace minvae::io {

/// Writes one spectrogram/feature/truth file triple per utterance plus
/// manifest.json (generator parameters, geometry, per-file fnv1a checksums).
/// Returns the manifest path.
std::string write_corpus(const evaldata::ToyCorpus& corpus, const std::string& dir);

/// Loads a corpus written by write_corpus, verifying every checksum.
evaldata::ToyCorpus load_corpus(const std::string& manifest_path);

/// FNV-1a 64-bit digest of a file, as a hex string.
std::string file_checksum(const std::string& path);

}  // namespace minvae::io

#endif  // MINVAE_CORPUS_IO_HPP_
