/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

/*
 * Bank manifests: JSON Lines, one entry per line.
 *
 *   {"id": "sub-01", "path": "healthy/sub-01.json", "kind": "posterior_stack",
 *    "class_map": {"c1": "gm", "c2": "wm"}}
 *   {"id": "les-07", "path": "lesions/les-07.nii.gz", "kind": "lesion_mask"}
 *   {"id": "atlas-3", "path": "img.nii.gz", "kind": "image", "label": "lab.nii.gz"}
 *
 * Blank lines and lines starting with '#' are ignored. Relative paths are
 * resolved against the manifest's directory. A posterior_stack path points at
 * a stack manifest (see stack_io.hpp); class_map renames its channels.
 */

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "synthstroke/error.hpp"
#include "synthstroke/stack_io.hpp"

namespace synthstroke {

class ManifestError : public Error
{
  public:
    using Error::Error;
};

enum class EntryKind
{
    posterior_stack,
    lesion_mask,
    image,
    label
};

inline const char* to_string(EntryKind k)
{
    switch (k) {
    case EntryKind::posterior_stack: return "posterior_stack";
    case EntryKind::lesion_mask: return "lesion_mask";
    case EntryKind::image: return "image";
    case EntryKind::label: return "label";
    }
    return "?";
}

inline EntryKind parse_entry_kind(const std::string& s)
{
    if (s == "posterior_stack")
        return EntryKind::posterior_stack;
    if (s == "lesion_mask")
        return EntryKind::lesion_mask;
    if (s == "image")
        return EntryKind::image;
    if (s == "label")
        return EntryKind::label;
    throw ManifestError("unknown entry kind '" + s + "'");
}

struct BankEntry
{
    std::string id;
    std::filesystem::path path;
    EntryKind kind = EntryKind::image;
    std::map<std::string, std::string> class_map; // channel name -> class name
    std::optional<std::filesystem::path> label;   // image entries only
};

struct BankManifest
{
    std::filesystem::path source;
    std::vector<BankEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    const BankEntry& find(const std::string& id) const
    {
        for (const auto& e : entries)
            if (e.id == id)
                return e;
        throw ManifestError(source.string() + ": no entry with id '" + id + "'");
    }
};

/// Parses and validates: ids unique, kind as expected (if given), files present.
inline BankManifest load_manifest(const std::filesystem::path& path, std::optional<EntryKind> expect = std::nullopt)
{
    std::ifstream in(path);
    if (!in)
        throw ManifestError("cannot open manifest " + path.string());
    BankManifest m;
    m.source = path;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    auto resolve = [&](std::filesystem::path p) { return p.is_relative() ? path.parent_path() / p : p; };
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ManifestError(where + ": invalid JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("path") || !j.contains("kind"))
            throw ManifestError(where + ": entry needs 'id', 'path' and 'kind'");
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "id" && it.key() != "path" && it.key() != "kind" && it.key() != "class_map" &&
                it.key() != "label")
                throw ManifestError(where + ": unknown key '" + it.key() + "'");
        BankEntry e;
        try {
            e.id = j["id"].get<std::string>();
            e.path = resolve(j["path"].get<std::string>());
            e.kind = parse_entry_kind(j["kind"].get<std::string>());
            if (j.contains("class_map"))
                e.class_map = j["class_map"].get<std::map<std::string, std::string>>();
            if (j.contains("label"))
                e.label = resolve(j["label"].get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw ManifestError(where + ": malformed entry: " + ex.what());
        }
        if (!ids.insert(e.id).second)
            throw ManifestError(where + ": duplicate id '" + e.id + "'");
        if (expect && e.kind != *expect)
            throw ManifestError(where + ": entry '" + e.id + "' has kind " + to_string(e.kind) + ", expected " +
                                to_string(*expect));
        if (!std::filesystem::exists(e.path))
            throw ManifestError("entry '" + e.id + "': file not found: " + e.path.string());
        if (e.label && !std::filesystem::exists(*e.label))
            throw ManifestError("entry '" + e.id + "': label file not found: " + e.label->string());
        m.entries.push_back(std::move(e));
    }
    return m;
}

/// Loads a posterior_stack entry, renames channels through class_map and
/// orders them as `classes`. Every class must be present.
inline PosteriorStack load_posterior_entry(const BankEntry& e, const std::vector<std::string>& classes)
{
    StackFile<PosteriorTag> f;
    try {
        f = read_stack<PosteriorTag>(e.path);
    } catch (const Error& ex) {
        throw ManifestError("entry '" + e.id + "': " + ex.what());
    }
    std::vector<std::string> names = f.stack.names();
    for (auto& n : names) {
        auto it = e.class_map.find(n);
        if (it != e.class_map.end())
            n = it->second;
    }
    std::vector<Volume> ch;
    for (const auto& c : classes) {
        const auto it = std::find(names.begin(), names.end(), c);
        if (it == names.end())
            throw ManifestError("entry '" + e.id + "': posterior stack lacks class '" + c + "'");
        ch.push_back(f.stack[static_cast<std::size_t>(it - names.begin())]);
    }
    return PosteriorStack(classes, std::move(ch));
}

} // namespace synthstroke
