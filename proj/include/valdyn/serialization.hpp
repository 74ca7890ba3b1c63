#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "valdyn/errors.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/textio.hpp"

// Text persistence for value tables, MDPs, and reward-search results.
// Reals are written with 17 significant digits, so load(save(x)) reproduces
// every binary64 value bit-exactly. Error split: structural problems (missing
// or malformed lines, hash mismatch) raise IoError; well-formed files whose
// values violate domain rules raise ValidationError from the domain
// constructors.

namespace valdyn {

/// A value table as stored on disk: the table itself plus the reward and
/// discount needed to scan it without the generating MDP.
struct StoredValueTable {
    ValueTable table;
    std::vector<double> reward; // row-major (s, a)
    double gamma = 0.0;
};

/// find_reward_with_gap output bundled with its search context.
struct RewardDocument {
    int side = 0;
    double gamma = 0.0;
    double target_delta = 0.0;
    double achieved_delta = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t attempts = 0;
    std::vector<double> reward; // per state
};

namespace detail {

inline void write_real_row(std::ostream& os, const double* row, int n) {
    for (int j = 0; j < n; ++j) {
        if (j) os << ' ';
        os << format_real17(row[j]);
    }
    os << '\n';
}

class LineCursor {
  public:
    LineCursor(std::string_view text, std::string_view what) : text_(text), what_(what) {}

    std::string_view next(std::string_view context) {
        if (pos_ >= text_.size())
            throw IoError(std::string(what_) + " format: missing " + std::string(context));
        std::size_t end = text_.find('\n', pos_);
        if (end == std::string_view::npos)
            throw IoError(std::string(what_) + " format: unterminated line in " +
                          std::string(context));
        std::string_view line = text_.substr(pos_, end - pos_);
        pos_ = end + 1;
        return line;
    }

    // A line "key v0 v1 ..." with an exact field count (0 = just the key).
    std::vector<std::string_view> keyed(std::string_view key, int values) {
        std::vector<std::string_view> fields = split_fields(next(key));
        if (fields.empty() || fields[0] != key)
            throw IoError(std::string(what_) + " format: expected '" + std::string(key) +
                          "' line");
        if (static_cast<int>(fields.size()) != values + 1)
            throw IoError(std::string(what_) + " format: wrong field count on '" +
                          std::string(key) + "' line");
        return fields;
    }

    std::vector<double> real_block(std::string_view key, int rows, int cols) {
        keyed(key, 0);
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(rows) * cols);
        for (int i = 0; i < rows; ++i) {
            std::vector<std::string_view> fields = split_fields(next(key));
            if (static_cast<int>(fields.size()) != cols)
                throw IoError(std::string(what_) + " format: wrong row width under '" +
                              std::string(key) + "'");
            for (std::string_view f : fields) out.push_back(parse_real(f));
        }
        return out;
    }

    bool exhausted() const { return pos_ >= text_.size(); }

  private:
    std::string_view text_;
    std::string_view what_;
    std::size_t pos_ = 0;
};

inline int parse_dimension(std::string_view token, std::string_view what) {
    long long v = parse_int(token);
    if (v < 1 || v > 1'000'000)
        throw IoError(std::string(what) + " format: dimension out of range");
    return static_cast<int>(v);
}

inline std::string slurp(std::istream& in, std::string_view what) {
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError(std::string(what) + ": read failure");
    return buf.str();
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

inline void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

} // namespace detail

inline void save_value_table(std::ostream& os, const ValueTable& table,
                             std::span<const double> reward, double gamma) {
    if (reward.size() != table.q().size())
        throw ValidationError("save_value_table: reward shape does not match the table");
    std::ostringstream payload;
    payload << "valdyn-table 1\n";
    payload << "num_states " << table.num_states() << '\n';
    payload << "num_actions " << table.num_actions() << '\n';
    payload << "gamma " << format_real17(gamma) << '\n';
    payload << "certified_epsilon "
            << (table.certified_epsilon() ? format_real17(*table.certified_epsilon()) : "none")
            << '\n';
    payload << "source " << to_string(table.source()) << '\n';
    payload << "q\n";
    for (int s = 0; s < table.num_states(); ++s)
        detail::write_real_row(payload, table.q().data() + table.index(s, 0),
                               table.num_actions());
    payload << "reward\n";
    for (int s = 0; s < table.num_states(); ++s)
        detail::write_real_row(payload, reward.data() + table.index(s, 0), table.num_actions());
    std::string text = payload.str();
    os << text << "content_hash " << to_hex16(fnv1a64(text)) << '\n';
}

inline void save_value_table(const std::string& path, const ValueTable& table,
                             std::span<const double> reward, double gamma) {
    std::ofstream out = detail::open_output(path);
    save_value_table(out, table, reward, gamma);
    detail::finish_output(out, path);
}

inline void save_value_table(const std::string& path, const ValueTable& table,
                             const TabularMdp& mdp) {
    require_same_shape(mdp, table, "save_value_table");
    save_value_table(path, table, mdp.rewards(), mdp.gamma());
}

inline StoredValueTable load_value_table_text(std::string_view text) {
    std::size_t hash_pos = text.rfind("content_hash ");
    if (hash_pos == std::string_view::npos || (hash_pos > 0 && text[hash_pos - 1] != '\n'))
        throw IoError("value-table format: missing content_hash line");
    std::string_view payload = text.substr(0, hash_pos);

    std::vector<std::string_view> hash_fields = split_fields(trim(text.substr(hash_pos)));
    if (hash_fields.size() != 2)
        throw IoError("value-table format: malformed content_hash line");
    if (hash_fields[1] != to_hex16(fnv1a64(payload)))
        throw IoError("value table corrupted: content hash mismatch");

    detail::LineCursor cur(payload, "value-table");
    std::vector<std::string_view> head = split_fields(cur.next("header"));
    if (head.size() != 2 || head[0] != "valdyn-table" || head[1] != "1")
        throw IoError("value-table format: unrecognized header");
    int ns = detail::parse_dimension(cur.keyed("num_states", 1)[1], "value-table");
    int na = detail::parse_dimension(cur.keyed("num_actions", 1)[1], "value-table");
    double gamma = parse_real(cur.keyed("gamma", 1)[1]);
    std::string_view cert_token = cur.keyed("certified_epsilon", 1)[1];
    std::optional<double> cert;
    if (cert_token != "none") cert = parse_real(cert_token);
    ValueSource source = value_source_from_string(cur.keyed("source", 1)[1]);
    std::vector<double> q = cur.real_block("q", ns, na);
    std::vector<double> reward = cur.real_block("reward", ns, na);
    if (!cur.exhausted()) throw IoError("value-table format: trailing content before hash");

    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ValidationError("value table: gamma must lie in [0, 1)");
    for (double r : reward)
        if (!std::isfinite(r)) throw ValidationError("value table: rewards must be finite");
    return StoredValueTable{ValueTable(ns, na, std::move(q), cert, source), std::move(reward),
                            gamma};
}

inline StoredValueTable load_value_table(std::istream& in) {
    return load_value_table_text(detail::slurp(in, "value table"));
}

inline StoredValueTable load_value_table(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    return load_value_table(in);
}

inline void save_mdp(std::ostream& os, const TabularMdp& mdp) {
    os << "valdyn-mdp 1\n";
    os << "num_states " << mdp.num_states() << '\n';
    os << "num_actions " << mdp.num_actions() << '\n';
    os << "gamma " << format_real17(mdp.gamma()) << '\n';
    os << "transition\n";
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            if (a) os << ' ';
            os << mdp.next_state(s, a);
        }
        os << '\n';
    }
    os << "reward\n";
    for (int s = 0; s < mdp.num_states(); ++s)
        detail::write_real_row(os, mdp.rewards().data() + mdp.index(s, 0), mdp.num_actions());
}

inline void save_mdp(const std::string& path, const TabularMdp& mdp) {
    std::ofstream out = detail::open_output(path);
    save_mdp(out, mdp);
    detail::finish_output(out, path);
}

inline TabularMdp load_mdp_text(std::string_view text) {
    detail::LineCursor cur(text, "mdp");
    std::vector<std::string_view> head = split_fields(cur.next("header"));
    if (head.size() != 2 || head[0] != "valdyn-mdp" || head[1] != "1")
        throw IoError("mdp format: unrecognized header");
    int ns = detail::parse_dimension(cur.keyed("num_states", 1)[1], "mdp");
    int na = detail::parse_dimension(cur.keyed("num_actions", 1)[1], "mdp");
    double gamma = parse_real(cur.keyed("gamma", 1)[1]);
    cur.keyed("transition", 0);
    std::vector<int> transition;
    transition.reserve(static_cast<std::size_t>(ns) * na);
    for (int s = 0; s < ns; ++s) {
        std::vector<std::string_view> fields = split_fields(cur.next("transition"));
        if (static_cast<int>(fields.size()) != na)
            throw IoError("mdp format: wrong row width under 'transition'");
        for (std::string_view f : fields) {
            long long v = parse_int(f);
            if (v < 0 || v >= ns) throw ValidationError("mdp: transition target out of range");
            transition.push_back(static_cast<int>(v));
        }
    }
    std::vector<double> reward = cur.real_block("reward", ns, na);
    if (!cur.exhausted()) throw IoError("mdp format: trailing content");
    return TabularMdp(ns, na, std::move(transition), std::move(reward), gamma);
}

inline TabularMdp load_mdp(std::istream& in) {
    return load_mdp_text(detail::slurp(in, "mdp"));
}

inline TabularMdp load_mdp(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    return load_mdp(in);
}

inline void save_reward_document(std::ostream& os, const RewardDocument& doc) {
    if (doc.reward.size() != static_cast<std::size_t>(doc.side) * doc.side)
        throw ValidationError("save_reward_document: reward length must equal side^2");
    os << "valdyn-reward 1\n";
    os << "side " << doc.side << '\n';
    os << "gamma " << format_real17(doc.gamma) << '\n';
    os << "target_delta " << format_real17(doc.target_delta) << '\n';
    os << "achieved_delta " << format_real17(doc.achieved_delta) << '\n';
    os << "seed " << doc.seed << '\n';
    os << "attempts " << doc.attempts << '\n';
    os << "reward\n";
    for (int row = 0; row < doc.side; ++row)
        detail::write_real_row(os, doc.reward.data() + static_cast<std::size_t>(row) * doc.side,
                               doc.side);
}

inline void save_reward_document(const std::string& path, const RewardDocument& doc) {
    std::ofstream out = detail::open_output(path);
    save_reward_document(out, doc);
    detail::finish_output(out, path);
}

inline RewardDocument load_reward_document_text(std::string_view text) {
    detail::LineCursor cur(text, "reward-document");
    std::vector<std::string_view> head = split_fields(cur.next("header"));
    if (head.size() != 2 || head[0] != "valdyn-reward" || head[1] != "1")
        throw IoError("reward-document format: unrecognized header");
    RewardDocument doc;
    doc.side = detail::parse_dimension(cur.keyed("side", 1)[1], "reward-document");
    doc.gamma = parse_real(cur.keyed("gamma", 1)[1]);
    doc.target_delta = parse_real(cur.keyed("target_delta", 1)[1]);
    doc.achieved_delta = parse_real(cur.keyed("achieved_delta", 1)[1]);
    doc.seed = static_cast<std::uint64_t>(parse_int(cur.keyed("seed", 1)[1]));
    doc.attempts = static_cast<std::uint64_t>(parse_int(cur.keyed("attempts", 1)[1]));
    doc.reward = cur.real_block("reward", doc.side, doc.side);
    if (!cur.exhausted()) throw IoError("reward-document format: trailing content");
    return doc;
}

inline RewardDocument load_reward_document(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    return load_reward_document_text(detail::slurp(in, "reward document"));
}

} // namespace valdyn
