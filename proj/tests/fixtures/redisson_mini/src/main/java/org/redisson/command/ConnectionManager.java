package org.redisson.command;

public interface ConnectionManager {

    Config getConfig();
}
