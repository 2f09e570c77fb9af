#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tcsim {

// Structured-text format shared by device files and experiment configs:
//
//   # comment
//   [section arg1 arg2]
//   key = value
//
// Section headers carry a kind plus positional arguments; keys below a header
// belong to that section. Keys before any header belong to an implicit
// top-level section with kind "".

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string kind;
    std::vector<std::string> args;
    std::vector<KeyValue> entries;
    int line = 0;

    const std::string* find(const std::string& key) const;
    // Typed getters throw ParseError with file:line context.
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& dflt) const;
    double get_double_or(const std::string& key, double dflt) const;
    int get_int_or(const std::string& key, int dflt) const;
    bool get_bool_or(const std::string& key, bool dflt) const;
    std::vector<double> get_doubles(const std::string& key) const;

    std::string file; // for error messages
};

struct KeyValueFile {
    std::string path;
    std::vector<Section> sections;

    std::vector<const Section*> of_kind(const std::string& kind) const;
    const Section* first_of_kind(const std::string& kind) const;
    // Top-level (pre-header) section; always present, possibly empty.
    const Section& top() const { return sections.front(); }
};

KeyValueFile parse_keyval_file(const std::string& path);
KeyValueFile parse_keyval_text(const std::string& text, const std::string& name);

} // namespace tcsim
