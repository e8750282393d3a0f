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

#include "metaqnn/channel.h"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace metaqnn {
namespace {

std::string Errno(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

void IgnoreSigpipe() { std::signal(SIGPIPE, SIG_IGN); }

}  // namespace

FdLineChannel::FdLineChannel(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {}

FdLineChannel::~FdLineChannel() { CloseDescriptors(); }

void FdLineChannel::CloseDescriptors() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  read_fd_ = write_fd_ = -1;
}

void FdLineChannel::WriteLine(const std::string& line) {
  if (write_fd_ < 0) throw ChannelClosedError("channel is closed");
  std::string data = line;
  data += '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ChannelClosedError(Errno("write failed"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdLineChannel::ReadLine(
    std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (eof_ || read_fd_ < 0) {
      throw ChannelClosedError("peer closed the channel");
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;

    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ChannelClosedError(Errno("poll failed"));
    }
    if (ready == 0) return std::nullopt;

    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ChannelClosedError(Errno("read failed"));
    }
    if (n == 0) {
      eof_ = true;
      // A final unterminated line still counts.
      if (!buffer_.empty()) buffer_ += '\n';
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

SubprocessChannel::Spawned SubprocessChannel::Spawn(const std::string& command) {
  IgnoreSigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw ChannelClosedError(Errno("pipe failed"));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ChannelClosedError(Errno("pipe failed"));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
      ::close(fd);
    }
    throw ChannelClosedError(Errno("fork failed"));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return {from_child[0], to_child[1], pid};
}

SubprocessChannel::SubprocessChannel(const std::string& command)
    : SubprocessChannel(Spawn(command)) {}

SubprocessChannel::SubprocessChannel(Spawned spawned)
    : FdLineChannel(spawned.read_fd, spawned.write_fd), pid_(spawned.pid) {}

SubprocessChannel::~SubprocessChannel() {
  CloseDescriptors();
  using namespace std::chrono_literals;
  const auto deadline = std::chrono::steady_clock::now() + 2s;
  int status = 0;
  while (::waitpid(pid_, &status, WNOHANG) == 0) {
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      break;
    }
    std::this_thread::sleep_for(10ms);
  }
}

std::unique_ptr<FdLineChannel> ConnectTcp(const std::string& address) {
  IgnoreSigpipe();
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ChannelClosedError("trainer address must be host:port, got '" +
                             address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &result);
      rc != 0) {
    throw ChannelClosedError("cannot resolve " + address + ": " +
                             ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                  ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) throw ChannelClosedError(Errno("cannot connect to " + address));
  return std::make_unique<FdLineChannel>(fd, fd);
}

}  // namespace metaqnn
