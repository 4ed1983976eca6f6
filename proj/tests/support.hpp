#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "colnet/kb.hpp"
#include "colnet/random.hpp"

namespace testing {

inline colnet::Entity entity(std::string id, std::string label, std::set<colnet::ClassId> classes,
                             std::vector<std::string> anchors = {}) {
  return colnet::Entity{std::move(id), std::move(label), std::move(anchors), std::move(classes)};
}

// Bird < Species, three birds and a swan-named ship.
inline colnet::KnowledgeBase bird_kb() {
  colnet::KnowledgeBase::Builder b;
  b.add_class("dbo:Species").add_class("dbo:Bird").add_class("dbo:Ship");
  b.add_subclass("dbo:Bird", "dbo:Species");
  b.add_entity(entity("dbr:Mute_swan", "Mute swan", {"dbo:Bird"}));
  b.add_entity(entity("dbr:Yellow-billed_duck", "Yellow-billed duck", {"dbo:Bird"}));
  b.add_entity(entity("dbr:Wandering_albatross", "Wandering albatross", {"dbo:Bird"}));
  b.add_entity(entity("dbr:Black_swan_(ship)", "Black Swan ship", {"dbo:Ship"}));
  return b.build();
}

// IT companies vs fruit and operating systems.
inline colnet::KnowledgeBase company_kb() {
  colnet::KnowledgeBase::Builder b;
  b.add_class("dbo:Company").add_class("dbo:ITCompany").add_class("dbo:Fruit").add_class("dbo:OperatingSystem");
  b.add_subclass("dbo:ITCompany", "dbo:Company");
  b.add_entity(entity("dbr:Google", "Google", {"dbo:ITCompany"}));
  b.add_entity(entity("dbr:Apple_Inc.", "Apple Inc.", {"dbo:ITCompany"}));
  b.add_entity(entity("dbr:Amazon.com", "Amazon.com", {"dbo:ITCompany"}));
  b.add_entity(entity("dbr:Alibaba_Group", "Alibaba Group", {"dbo:ITCompany"}));
  b.add_entity(entity("dbr:Apple", "Apple", {"dbo:Fruit"}));
  b.add_entity(entity("dbr:Microsoft_Windows", "Microsoft Windows", {"dbo:OperatingSystem"}, {"MS"}));
  b.add_entity(entity("dbr:Banana", "Banana", {"dbo:Fruit"}));
  return b.build();
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("colnet-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  void write(const std::string& name, const std::string& content) const {
    std::filesystem::create_directories((path_ / name).parent_path());
    std::ofstream(path_ / name, std::ios::binary) << content;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
