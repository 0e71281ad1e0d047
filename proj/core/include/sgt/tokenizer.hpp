#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sgt/scenegraph.hpp"

namespace sgt {

enum class TokenRole : std::uint8_t { Special, Subject, Object, Predicate };

struct TokenSequence {
  std::vector<int> ids;
  std::vector<TokenRole> roles;  // parallel to ids

  std::size_t size() const { return ids.size(); }
  void append(const TokenSequence& other) {
    ids.insert(ids.end(), other.ids.begin(), other.ids.end());
    roles.insert(roles.end(), other.roles.begin(), other.roles.end());
  }
};

// Fixed layout: [PAD] [UNK] [BOQ] [SEP] [EOQ] [EOS], classes (lexicographic),
// instances <0>..<max_instances-1>, relations (schema order, one contiguous
// block). id(token) = position.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBoq = 2;
  static constexpr int kSep = 3;
  static constexpr int kEoq = 4;
  static constexpr int kEos = 5;
  static constexpr int kSpecialCount = 6;

  static Vocabulary build(const Schema& schema, int max_instances);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  // -1 when the text is not a token.
  int lookup(const std::string& text) const;

  int class_begin() const { return kSpecialCount; }
  int class_count() const { return class_count_; }
  int instance_begin() const { return kSpecialCount + class_count_; }
  int instance_count() const { return instance_count_; }
  int relation_begin() const {
    return kSpecialCount + class_count_ + instance_count_;
  }
  int relation_count() const { return relation_count_; }

  bool is_class(int id) const {
    return id >= class_begin() && id < class_begin() + class_count_;
  }
  bool is_instance(int id) const {
    return id >= instance_begin() && id < instance_begin() + instance_count_;
  }
  bool is_relation(int id) const {
    return id >= relation_begin() && id < relation_begin() + relation_count_;
  }

  // Throw UnknownSymbol when absent from the corresponding block.
  int class_id(const std::string& cls) const;
  int instance_id(int index) const;
  int relation_id(const std::string& rel) const;

  int max_instances() const { return instance_count_; }
  const Schema& schema() const { return schema_; }

  // `SGT-VOCAB v1` header, then one token per line, line number = id.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  Vocabulary() = default;

  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
  int class_count_ = 0;
  int instance_count_ = 0;
  int relation_count_ = 0;
  Schema schema_;
};

// [BOQ] s_cls s_ind o_cls o_ind [SEP] pred [EOQ]  (8 tokens)
TokenSequence encode_triplet(const Vocabulary& v, const NodeRef& subj,
                             const std::string& rel, const NodeRef& obj);

// Frames for g.edges() in stored order, then [EOS]; length 8·N + 1. When
// pad = true the sequence is right-padded with [PAD] to context_length.
TokenSequence encode_graph(const Vocabulary& v, const SceneGraph& g,
                           int context_length, bool pad = false);

// Inverse of encode_graph on valid graphs; trailing [PAD] ignored; nodes
// appear in first-mention order.
SceneGraph decode_sequence(const Vocabulary& v, const TokenSequence& s);

// [BOQ] s_cls s_ind o_cls o_ind [SEP]  (6 tokens)
TokenSequence build_query(const Vocabulary& v, const NodeRef& subj,
                          const NodeRef& obj);

}  // namespace sgt
