package org.redisson.command;

import java.util.List;

public interface RedisConnection {

    void send(List<String> commands, BatchOptions options);
}
