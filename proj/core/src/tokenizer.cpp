#include "sgt/tokenizer.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace sgt {
namespace {

const char* const kSpecialNames[] = {"[PAD]", "[UNK]", "[BOQ]",
                                     "[SEP]", "[EOQ]", "[EOS]"};

std::string instance_token(int index) {
  return "<" + std::to_string(index) + ">";
}

}  // namespace

Vocabulary Vocabulary::build(const Schema& schema, int max_instances) {
  if (schema.classes.empty() || schema.relations.empty())
    fail(ErrorCode::EmptyInput, "schema has no classes or no relations");
  if (max_instances < 1)
    fail(ErrorCode::EmptyInput, "max_instances must be >= 1");

  Vocabulary v;
  v.schema_ = schema;
  for (const auto* name : kSpecialNames) v.tokens_.emplace_back(name);

  std::vector<std::string> classes = schema.classes;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (const auto& c : classes) {
    if (c.empty() || c.front() == '<' || c.front() == '[')
      fail(ErrorCode::UnknownSymbol, "class name '" + c + "' collides with token syntax");
    v.tokens_.push_back(c);
  }
  v.class_count_ = static_cast<int>(classes.size());

  for (int i = 0; i < max_instances; ++i) v.tokens_.push_back(instance_token(i));
  v.instance_count_ = max_instances;

  for (const auto& r : schema.relations) v.tokens_.push_back(r);
  v.relation_count_ = static_cast<int>(schema.relations.size());

  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], static_cast<int>(i)).second)
      fail(ErrorCode::UnknownSymbol, "duplicate token '" + v.tokens_[i] + "'");
  }
  return v;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    fail(ErrorCode::UnknownSymbol, "token id " + std::to_string(id) +
                                       " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::lookup(const std::string& text) const {
  const auto it = ids_.find(text);
  return it == ids_.end() ? -1 : it->second;
}

int Vocabulary::class_id(const std::string& cls) const {
  const int id = lookup(cls);
  if (id < 0 || !is_class(id))
    fail(ErrorCode::UnknownSymbol, "class '" + cls + "' not in vocabulary");
  return id;
}

int Vocabulary::instance_id(int index) const {
  if (index < 0 || index >= instance_count_)
    fail(ErrorCode::UnknownSymbol, "instance index " + std::to_string(index) +
                                       " outside <0>..<" +
                                       std::to_string(instance_count_ - 1) + ">");
  return instance_begin() + index;
}

int Vocabulary::relation_id(const std::string& rel) const {
  const int id = lookup(rel);
  if (id < 0 || !is_relation(id))
    fail(ErrorCode::UnknownSymbol, "relation '" + rel + "' not in vocabulary");
  return id;
}

void Vocabulary::save(std::ostream& out) const {
  out << "SGT-VOCAB v1\n";
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "SGT-VOCAB v1")
    fail(ErrorCode::FormatError, "missing 'SGT-VOCAB v1' header");

  Vocabulary v;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.tokens_.push_back(line);
  }
  if (v.tokens_.size() < kSpecialCount)
    fail(ErrorCode::FormatError, "vocabulary truncated");
  for (int i = 0; i < kSpecialCount; ++i) {
    if (v.tokens_[static_cast<std::size_t>(i)] != kSpecialNames[i])
      fail(ErrorCode::FormatError,
           "special token " + std::to_string(i) + " is '" +
               v.tokens_[static_cast<std::size_t>(i)] + "', expected '" +
               kSpecialNames[i] + "'");
  }

  // Block boundaries are recovered from the token syntax: instance tokens are
  // <k>, class and relation tokens never start with '<' or '['.
  std::size_t i = kSpecialCount;
  while (i < v.tokens_.size() && v.tokens_[i].front() != '<') ++i;
  const std::size_t instance_start = i;
  while (i < v.tokens_.size() && v.tokens_[i].front() == '<') ++i;
  const std::size_t relation_start = i;
  v.class_count_ = static_cast<int>(instance_start - kSpecialCount);
  v.instance_count_ = static_cast<int>(relation_start - instance_start);
  v.relation_count_ = static_cast<int>(v.tokens_.size() - relation_start);
  if (v.class_count_ < 1 || v.instance_count_ < 1 || v.relation_count_ < 1)
    fail(ErrorCode::FormatError, "vocabulary blocks missing or out of order");
  for (std::size_t k = instance_start; k < relation_start; ++k) {
    if (v.tokens_[k] != instance_token(static_cast<int>(k - instance_start)))
      fail(ErrorCode::FormatError, "instance token '" + v.tokens_[k] +
                                       "' out of order at id " +
                                       std::to_string(k));
  }

  for (std::size_t k = 0; k < v.tokens_.size(); ++k) {
    if (!v.ids_.emplace(v.tokens_[k], static_cast<int>(k)).second)
      fail(ErrorCode::FormatError, "duplicate token '" + v.tokens_[k] + "'");
  }

  v.schema_.id = "vocab-file";
  v.schema_.classes.assign(v.tokens_.begin() + kSpecialCount,
                           v.tokens_.begin() + static_cast<long>(instance_start));
  v.schema_.relations.assign(v.tokens_.begin() + static_cast<long>(relation_start),
                             v.tokens_.end());
  return v;
}

TokenSequence encode_triplet(const Vocabulary& v, const NodeRef& subj,
                             const std::string& rel, const NodeRef& obj) {
  TokenSequence s;
  s.ids = {Vocabulary::kBoq,
           v.class_id(subj.cls),
           v.instance_id(subj.instance),
           v.class_id(obj.cls),
           v.instance_id(obj.instance),
           Vocabulary::kSep,
           v.relation_id(rel),
           Vocabulary::kEoq};
  s.roles = {TokenRole::Special, TokenRole::Subject, TokenRole::Subject,
             TokenRole::Object,  TokenRole::Object,  TokenRole::Special,
             TokenRole::Predicate, TokenRole::Special};
  return s;
}

TokenSequence encode_graph(const Vocabulary& v, const SceneGraph& g,
                           int context_length, bool pad) {
  const std::size_t need = 8 * g.edges().size() + 1;
  if (static_cast<int>(need) > context_length)
    fail(ErrorCode::ContextOverflow,
         std::to_string(need) + " tokens > context_length " +
             std::to_string(context_length));
  TokenSequence s;
  s.ids.reserve(pad ? static_cast<std::size_t>(context_length) : need);
  s.roles.reserve(s.ids.capacity());
  for (const auto& e : g.edges()) s.append(encode_triplet(v, e.src, e.rel, e.dst));
  s.ids.push_back(Vocabulary::kEos);
  s.roles.push_back(TokenRole::Special);
  if (pad) {
    s.ids.resize(static_cast<std::size_t>(context_length), Vocabulary::kPad);
    s.roles.resize(static_cast<std::size_t>(context_length), TokenRole::Special);
  }
  return s;
}

SceneGraph decode_sequence(const Vocabulary& v, const TokenSequence& s) {
  SceneGraph g(v.schema());
  std::size_t pos = 0;
  const auto expect = [&](bool ok, const char* what) {
    if (!ok)
      fail(ErrorCode::FramingError,
           "position " + std::to_string(pos) + ": expected " + what);
  };

  while (true) {
    expect(pos < s.size(), "[BOQ] or [EOS], got end of sequence");
    const int head = s.ids[pos];
    if (head == Vocabulary::kEos) {
      ++pos;
      break;
    }
    expect(head == Vocabulary::kBoq, "[BOQ]");
    expect(pos + 8 <= s.size(), "complete 8-token quintuple frame");
    const int s_cls = s.ids[pos + 1];
    const int s_ind = s.ids[pos + 2];
    const int o_cls = s.ids[pos + 3];
    const int o_ind = s.ids[pos + 4];
    expect(v.is_class(s_cls), "class token (subject)");
    expect(v.is_instance(s_ind), "instance token (subject)");
    expect(v.is_class(o_cls), "class token (object)");
    expect(v.is_instance(o_ind), "instance token (object)");
    expect(s.ids[pos + 5] == Vocabulary::kSep, "[SEP]");
    expect(v.is_relation(s.ids[pos + 6]), "relation token");
    expect(s.ids[pos + 7] == Vocabulary::kEoq, "[EOQ]");

    const NodeRef subj{v.token(s_cls), s_ind - v.instance_begin()};
    const NodeRef obj{v.token(o_cls), o_ind - v.instance_begin()};
    if (!g.has_node(subj)) g.add_node(subj);
    if (!g.has_node(obj)) g.add_node(obj);
    g.add_edge(Edge{subj, obj, v.token(s.ids[pos + 6])});
    pos += 8;
  }

  for (; pos < s.size(); ++pos)
    expect(s.ids[pos] == Vocabulary::kPad, "[PAD] after [EOS]");
  return g;
}

TokenSequence build_query(const Vocabulary& v, const NodeRef& subj,
                          const NodeRef& obj) {
  TokenSequence s;
  s.ids = {Vocabulary::kBoq, v.class_id(subj.cls), v.instance_id(subj.instance),
           v.class_id(obj.cls), v.instance_id(obj.instance), Vocabulary::kSep};
  s.roles = {TokenRole::Special, TokenRole::Subject, TokenRole::Subject,
             TokenRole::Object,  TokenRole::Object,  TokenRole::Special};
  return s;
}

}  // namespace sgt
