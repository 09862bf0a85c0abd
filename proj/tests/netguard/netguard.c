// Preloaded into a process to prove it stays offline: any attempt to open
// an IP socket or resolve a host name terminates it with status 86.
#define _GNU_SOURCE
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

static void refuse(const char *what) {
  static const char prefix[] = "netguard: blocked ";
  (void)!write(2, prefix, sizeof prefix - 1);
  size_t n = 0;
  while (what[n]) ++n;
  (void)!write(2, what, n);
  (void)!write(2, "\n", 1);
  _exit(86);
}

int socket(int domain, int type, int protocol) {
  (void)type;
  (void)protocol;
  if (domain == AF_INET || domain == AF_INET6) refuse("socket");
  // Local sockets are not network activity; fail them rather than pass
  // through so the guard never needs the real symbol.
  return -1;
}

int connect(int fd, const struct sockaddr *addr, socklen_t len) {
  (void)fd;
  (void)addr;
  (void)len;
  refuse("connect");
  return -1;
}

int getaddrinfo(const char *node, const char *service, const struct addrinfo *hints,
                struct addrinfo **res) {
  (void)node;
  (void)service;
  (void)hints;
  (void)res;
  refuse("getaddrinfo");
  return EAI_FAIL;
}
