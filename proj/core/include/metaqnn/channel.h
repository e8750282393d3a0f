/* Copyright 2026 The MetaQNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef METAQNN_CHANNEL_H_
#define METAQNN_CHANNEL_H_

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <sys/types.h>

namespace metaqnn {

// The peer closed the stream or the descriptor failed.
class ChannelClosedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;

  // Appends '\n'. Throws ChannelClosedError.
  virtual void WriteLine(const std::string& line) = 0;

  // Next complete line without its terminator, or nullopt if none arrived
  // within `timeout`. Throws ChannelClosedError at end of stream.
  virtual std::optional<std::string> ReadLine(
      std::chrono::milliseconds timeout) = 0;
};

// Channel over a pair of POSIX descriptors (may be the same socket).
class FdLineChannel : public LineChannel {
 public:
  FdLineChannel(int read_fd, int write_fd);
  ~FdLineChannel() override;
  FdLineChannel(const FdLineChannel&) = delete;
  FdLineChannel& operator=(const FdLineChannel&) = delete;

  void WriteLine(const std::string& line) override;
  std::optional<std::string> ReadLine(
      std::chrono::milliseconds timeout) override;

 protected:
  void CloseDescriptors();

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
  bool eof_ = false;
};

// Launches `command` through /bin/sh and talks to its stdin/stdout. The
// child's stderr is inherited.
class SubprocessChannel : public FdLineChannel {
 public:
  explicit SubprocessChannel(const std::string& command);
  ~SubprocessChannel() override;

  pid_t pid() const { return pid_; }

 private:
  struct Spawned {
    int read_fd;
    int write_fd;
    pid_t pid;
  };
  static Spawned Spawn(const std::string& command);
  explicit SubprocessChannel(Spawned spawned);

  pid_t pid_;
};

// "host:port". Throws ChannelClosedError if the connection fails.
std::unique_ptr<FdLineChannel> ConnectTcp(const std::string& address);

}  // namespace metaqnn

#endif  // METAQNN_CHANNEL_H_
