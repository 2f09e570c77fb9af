#include "tcsim/keyval.hpp"
#include "tcsim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace tcsim {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

} // namespace

const std::string* Section::find(const std::string& key) const {
    for (const auto& kv : entries)
        if (kv.key == key) return &kv.value;
    return nullptr;
}

std::string Section::get_string(const std::string& key) const {
    const auto* v = find(key);
    if (!v) throw ParseError(file, line, "missing key '" + key + "' in section [" + kind + "]");
    return *v;
}

double Section::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw ParseError(file, line, "key '" + key + "': expected a number, got '" + v + "'");
}

int Section::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        long i = std::stol(v, &pos);
        if (trim(v.substr(pos)).empty()) return static_cast<int>(i);
    } catch (const std::exception&) {
    }
    throw ParseError(file, line, "key '" + key + "': expected an integer, got '" + v + "'");
}

bool Section::get_bool(const std::string& key) const {
    std::string v = get_string(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError(file, line, "key '" + key + "': expected true/false, got '" + v + "'");
}

std::string Section::get_string_or(const std::string& key, const std::string& dflt) const {
    const auto* v = find(key);
    return v ? *v : dflt;
}

double Section::get_double_or(const std::string& key, double dflt) const {
    return find(key) ? get_double(key) : dflt;
}

int Section::get_int_or(const std::string& key, int dflt) const {
    return find(key) ? get_int(key) : dflt;
}

bool Section::get_bool_or(const std::string& key, bool dflt) const {
    return find(key) ? get_bool(key) : dflt;
}

std::vector<double> Section::get_doubles(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<double> out;
    std::string item;
    std::istringstream iss(v);
    while (std::getline(iss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (!trim(item.substr(pos)).empty()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError(file, line, "key '" + key + "': bad number '" + item + "'");
        }
    }
    return out;
}

KeyValueFile parse_keyval_text(const std::string& text, const std::string& name) {
    KeyValueFile f;
    f.path = name;
    Section top;
    top.file = name;
    f.sections.push_back(top);

    std::istringstream iss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(iss, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(name, lineno, "unterminated section header");
            auto parts = split_ws(line.substr(1, line.size() - 2));
            if (parts.empty())
                throw ParseError(name, lineno, "empty section header");
            Section s;
            s.kind = parts[0];
            s.args.assign(parts.begin() + 1, parts.end());
            s.line = lineno;
            s.file = name;
            f.sections.push_back(std::move(s));
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(name, lineno, "expected 'key = value', got '" + line + "'");
        KeyValue kv;
        kv.key = trim(line.substr(0, eq));
        kv.value = trim(line.substr(eq + 1));
        kv.line = lineno;
        if (kv.key.empty())
            throw ParseError(name, lineno, "empty key");
        Section& cur = f.sections.back();
        if (cur.find(kv.key))
            throw ParseError(name, lineno, "duplicate key '" + kv.key + "'");
        cur.entries.push_back(std::move(kv));
    }
    return f;
}

KeyValueFile parse_keyval_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_keyval_text(buf.str(), path);
}

std::vector<const Section*> KeyValueFile::of_kind(const std::string& kind) const {
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (s.kind == kind) out.push_back(&s);
    return out;
}

const Section* KeyValueFile::first_of_kind(const std::string& kind) const {
    for (const auto& s : sections)
        if (s.kind == kind) return &s;
    return nullptr;
}

} // namespace tcsim
