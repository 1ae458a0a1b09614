package org.redisson.command;

import java.util.ArrayList;
import java.util.List;

public class Entry {

    private final List<String> commands = new ArrayList<>();

    public List<String> getCommands() {
        return commands;
    }
}
